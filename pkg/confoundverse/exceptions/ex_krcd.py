from confoundverse.config import settings


class KRCDError(Exception):
    """Base error of the confoundverse package."""
    MSG = {
        settings.ENG: '{}',
        settings.ESP: '{}',
    }

    def __init__(self, *args):
        self.args_ = args
        super().__init__(self.MSG[settings.lang()].format(*args))

    def __repr__(self):
        return f'{type(self).__name__}{self.args_!r}'


class ArgumentErrorKRCD(KRCDError, ValueError):...
class ConfigurationErrorKRCD(KRCDError, ValueError):...
class InputErrorKRCD(KRCDError, ValueError):...
class NumericErrorKRCD(KRCDError, ArithmeticError):...


class ErrorDimensionMismatch(ArgumentErrorKRCD):
    MSG = {
        settings.ENG: 'Dimension mismatch in {}: expected {}, got {}',
        settings.ESP: 'Dimensiones incompatibles en {}: se esperaba {}, se obtuvo {}',
    }

    def __init__(self, where: str, expected, got):
        self.where = where
        self.expected = expected
        self.got = got
        super().__init__(where, expected, got)


class ErrorSingleClassLabels(ArgumentErrorKRCD):
    MSG = {
        settings.ENG: 'Labels need at least one positive and one negative, got {} positives of {}',
        settings.ESP: 'Las etiquetas necesitan al menos un positivo y un negativo, hay {} positivos de {}',
    }

    def __init__(self, positives: int, total: int):
        super().__init__(positives, total)


class ErrorBasisSize(ConfigurationErrorKRCD):
    MSG = {
        settings.ENG: 'Basis size P={} must satisfy 1 <= P < N={}',
        settings.ESP: 'El tamano de base P={} debe cumplir 1 <= P < N={}',
    }

    def __init__(self, P: int, N: int):
        self.P = P
        self.N = N
        super().__init__(P, N)


class ErrorNotPositive(ConfigurationErrorKRCD):
    MSG = {
        settings.ENG: 'The parameter "{}" must be strictly positive, got {!r}',
        settings.ESP: 'El parametro "{}" debe ser estrictamente positivo, se obtuvo {!r}',
    }

    def __init__(self, name: str, value):
        self.name = name
        self.value = value
        super().__init__(name, value)


class ErrorInvalidOption(ConfigurationErrorKRCD):
    MSG = {
        settings.ENG: 'The value {!r} is not valid for "{}", expected one of {}',
        settings.ESP: 'El valor {!r} no es valido para "{}", se esperaba uno de {}',
    }

    def __init__(self, value, name: str, choices):
        self.value = value
        self.name = name
        self.choices = tuple(choices)
        super().__init__(value, name, list(self.choices))


class ErrorOutOfRange(ConfigurationErrorKRCD):
    MSG = {
        settings.ENG: 'The parameter "{}" must lie in {}, got {!r}',
        settings.ESP: 'El parametro "{}" debe estar en {}, se obtuvo {!r}',
    }

    def __init__(self, name: str, value, interval: str):
        self.name = name
        self.value = value
        self.interval = interval
        super().__init__(name, interval, value)


class ErrorEnvironments(ConfigurationErrorKRCD):
    MSG = {
        settings.ENG: 'Environment count {} must satisfy 2 <= n_envs <= N={}',
        settings.ESP: 'El numero de entornos {} debe cumplir 2 <= n_envs <= N={}',
    }

    def __init__(self, n_envs: int, N: int):
        self.n_envs = n_envs
        self.N = N
        super().__init__(n_envs, N)


class ErrorNotDefinedColor(ArgumentErrorKRCD):
    MSG = {
        settings.ENG: 'The color "{}" is not defined in the console',
        settings.ESP: 'El color "{}" no esta definido en la consola',
    }

    def __init__(self, color: str):
        self.color = color
        super().__init__(color)


class ErrorNotDefinedStyle(ArgumentErrorKRCD):
    MSG = {
        settings.ENG: 'The style "{}" is not defined in the console',
        settings.ESP: 'El estilo "{}" no esta definido en la consola',
    }

    def __init__(self, style: str):
        self.style = style
        super().__init__(style)


class ErrorNonFinite(InputErrorKRCD):
    MSG = {
        settings.ENG: 'The input "{}" contains non-finite values',
        settings.ESP: 'La entrada "{}" contiene valores no finitos',
    }

    def __init__(self, what: str):
        self.what = what
        super().__init__(what)


class ErrorMissingColumns(InputErrorKRCD):
    MSG = {
        settings.ENG: 'Missing required columns: {}',
        settings.ESP: 'Faltan columnas requeridas: {}',
    }

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(', '.join(self.columns))


class ErrorRowCount(InputErrorKRCD):
    MSG = {
        settings.ENG: 'Inconsistent row counts: {}',
        settings.ESP: 'Numero de filas inconsistente: {}',
    }

    def __init__(self, counts: dict):
        self.counts = dict(counts)
        super().__init__(self.counts)


class ErrorNonFiniteKernel(NumericErrorKRCD):
    MSG = {
        settings.ENG: 'The kernel "{}" produced a non-finite value',
        settings.ESP: 'El kernel "{}" produjo un valor no finito',
    }

    def __init__(self, family: str):
        self.family = family
        super().__init__(family)


class ErrorFactorization(NumericErrorKRCD):
    MSG = {
        settings.ENG: 'Cholesky factorization failed after jitter escalation (lambda={:.3e}, condition estimate={:.3e})',
        settings.ESP: 'La factorizacion de Cholesky fallo tras escalar el jitter (lambda={:.3e}, condicion estimada={:.3e})',
    }

    def __init__(self, lam: float, condition: float):
        self.lam = lam
        self.condition = condition
        super().__init__(lam, condition)


class ErrorUnreadableInput(InputErrorKRCD):
    MSG = {
        settings.ENG: 'The file "{}" could not be read: {}',
        settings.ESP: 'No se pudo leer el archivo "{}": {}',
    }

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(path, reason)
