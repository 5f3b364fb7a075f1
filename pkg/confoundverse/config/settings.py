"""
This is a module for the package-wide settings.

Functions:
- lang(): Returns the current message language code.
- define_lang(language: str): Sets the message language.
- threads(): Returns the BLAS thread cap, or None when uncapped.
- define_threads(n: int | None): Sets the BLAS thread cap.
- thread_limit(n: int | None): Context manager applying a thread cap.

Constants:
- DEFAULT_LAMBDA, DEFAULT_ALPHA, DEFAULT_P, DEFAULT_NOISE_HALF_WIDTH,
  MEDIAN_SUBSAMPLE, FORMAT_VERSION, THREADS_ENV

Example usage:
    >>> from confoundverse.config import settings

    >>> settings.lang()  # 'en'
    >>> settings.define_lang('es')
    >>> with settings.thread_limit(1):
    ...     run_detection()
"""

from typing import Optional
import contextlib
import os

from threadpoolctl import threadpool_limits


DEFAULT_LAMBDA: float = 1e-8
DEFAULT_ALPHA: float = 0.05
DEFAULT_P: int = 40
DEFAULT_NOISE_HALF_WIDTH: float = 0.1
MEDIAN_SUBSAMPLE: int = 1000
FORMAT_VERSION: str = '1'
THREADS_ENV: str = 'KRCD_THREADS'

ENG: str = 'en'
ESP: str = 'es'


class SettingsError(ValueError):
    pass


def singleton(name):
    def wrapper(cls):
        instances = {}

        def getinstance():
            if name not in instances:
                instances[name] = cls()
            return instances[name]

        return getinstance

    return wrapper


def _threads_from_env() -> Optional[int]:
    raw = os.environ.get(THREADS_ENV, '').strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise SettingsError(f'{THREADS_ENV} must be a positive integer, got {raw!r}')
    if value < 1:
        raise SettingsError(f'{THREADS_ENV} must be a positive integer, got {raw!r}')
    return value


@singleton('settings')
class Settings:
    _language = 'en'
    _threads: Optional[int] = None

    LANGUAGES = [ENG, ESP]

    def __init__(self):
        self._threads = _threads_from_env()

    def lang(self) -> str:
        return self._language

    def define_lang(self, language: str) -> None:
        if language not in self.LANGUAGES:
            raise SettingsError(f'Invalid language: {language!r}')
        self._language = language

    def threads(self) -> Optional[int]:
        return self._threads

    def define_threads(self, n: Optional[int]) -> None:
        if n is not None and n < 1:
            raise SettingsError(f'Thread cap must be positive, got {n!r}')
        self._threads = n

    def __repr__(self) -> str:
        return f'Settings(lang={self._language!r}, threads={self._threads!r})'


_settings = Settings()


def lang() -> str:
    return _settings.lang()


def define_lang(language: str) -> None:
    _settings.define_lang(language)


def threads() -> Optional[int]:
    return _settings.threads()


def define_threads(n: Optional[int]) -> None:
    _settings.define_threads(n)


@contextlib.contextmanager
def thread_limit(n: Optional[int] = None):
    """
    Cap the BLAS thread pools while the block runs.

    Parameters
    ----------
    n : int, optional
        The cap to apply, by default the configured `threads()`; when both
        are None the pools are left untouched
    """
    limit = n if n is not None else threads()
    if limit is None:
        yield
        return
    with threadpool_limits(limits=limit):
        yield
