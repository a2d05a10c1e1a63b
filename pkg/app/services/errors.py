class SimulationError(Exception):
    exit_code = 1


class ConfigurationError(SimulationError):
    exit_code = 2


class ConfigurationNotFound(ConfigurationError):
    pass


class ConfigurationValidationError(ConfigurationError):
    pass


class ScenarioNotFound(ConfigurationError):
    pass


class StepSizeError(ConfigurationError):
    pass


class CertificateError(SimulationError):
    """
    A synthesized operator failed one of its correctness certificates.
    `failures` holds one entry per failing check, naming the channel and condition.
    """
    exit_code = 3

    def __init__(self, message, failures=None):
        self.message = message
        self.failures = list(failures or [])
        detail = "; ".join(str(f) for f in self.failures)
        super().__init__(f"{message}: {detail}" if detail else message)


class KnillLaflammeError(CertificateError):
    pass


class NonHermitianOperatorError(CertificateError):
    pass


class AnticommutationError(CertificateError):
    pass


class NumericalIntegrityError(SimulationError):
    exit_code = 4

    def __init__(self, message, step=None, value=None):
        self.message = message
        self.step = step
        self.value = value
        super().__init__(f"'step {step}: {message}, value: {value}'" if step is not None else message)


class DimensionMismatchError(ValueError):
    pass


class InvalidStabilizerError(ValueError):
    pass


class MissingConjugatorsError(ValueError):
    pass


class SchemeModeError(ValueError):
    pass


class EnsembleMismatchError(ValueError):
    pass


class FitError(ValueError):
    pass


class ChannelLayoutError(ConfigurationError, ValueError):
    pass


class DetectionEfficiencyError(ConfigurationError, ValueError):
    pass
