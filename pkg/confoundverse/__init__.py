__version__ = '0.1.0'

from confoundverse.kernel_core import KernelSpec
from confoundverse.estimator import RidgeConfig, fit_kls, fit_hkls
from confoundverse.confounder_testing import ObservedData, TestResult, Verdict, detect
from confoundverse.datagen import ScenarioConfig, generate
