from setuptools import setup, find_packages


setup(
    name='ConfoundVerse',
    version='0.1.0',
    description='Hidden confounder detection by comparing plain and weighted kernel ridge coefficients',
    long_description=open('README.md', 'r').read(),
    long_description_content_type='text/markdown',
    author='Sebastian Martinez',
    author_email='sebastian.martinez.serna@gmail.com',
    packages=find_packages(exclude=['tests', 'tests.*']),
    python_requires='>=3.10',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
        'pandas>=1.5',
        'click>=8.2',
        'joblib>=1.2',
        'threadpoolctl>=3.1',
    ],
    entry_points={
        'console_scripts': [
            'confoundverse = confoundverse.cli:main',
        ],
    },
    classifiers=[
        'Development Status :: 3 - Beta',
        'License :: OSI Approved :: MIT License',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12'
    ],
)
