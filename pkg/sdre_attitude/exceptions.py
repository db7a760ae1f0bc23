class SdreException(Exception):
    pass


class MrpSingularityException(SdreException):
    pass


class GimbalLockException(SdreException):
    pass


class AsymmetricMatrixException(SdreException):
    pass


class SingularLyapunovException(SdreException):
    pass


class RiccatiException(SdreException):
    pass


class RiccatiNoConvergenceException(RiccatiException):
    pass


class CertificationException(RiccatiException):
    pass


class GainTableBuildException(SdreException):
    def __init__(self, failures):
        self.failures = failures
        lines = "\n".join(f"  vertex {index}: {reason}" for index, reason in failures)
        super().__init__(f"{len(failures)} vertex solve(s) failed:\n{lines}")


class GainTableFormatException(SdreException):
    pass


class GainTableVersionException(GainTableFormatException):
    pass


class GainTableLengthException(GainTableFormatException):
    pass


class DivergenceException(SdreException):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InertiaPerturbationException(SdreException):
    pass


class ConfigException(SdreException):
    pass


class ConfigParseException(ConfigException):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ConfigValidationException(ConfigException):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
