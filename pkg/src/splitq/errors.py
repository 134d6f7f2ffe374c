"""Exception types shared across the package."""


class SplitQError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SplitQError, ValueError):
    """An argument is out of range or inconsistent with its container."""


class ConvergenceError(SplitQError, RuntimeError):
    """Value iteration hit its sweep cap before reaching the tolerance."""

    def __init__(self, message, residual, sweeps):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps

    def __reduce__(self):
        return type(self), (self.args[0], self.residual, self.sweeps)


class TrialError(SplitQError, RuntimeError):
    """A trial aborted; carries the trial index and agent name."""

    def __init__(self, message, trial, agent=None):
        super().__init__(message)
        self.trial = trial
        self.agent = agent

    def __reduce__(self):   # keep the fields when crossing process boundaries
        return type(self), (self.args[0], self.trial, self.agent)


class ConfigError(SplitQError):
    """Base class for experiment-config problems."""


class ConfigFileNotFound(ConfigError, FileNotFoundError):
    pass


class ConfigSyntaxError(ConfigError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownKeyError(ConfigError):
    def __init__(self, section, key, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}unknown key {key!r} in section [{section}]")
        self.section = section
        self.key = key
        self.line = line


class OutOfRangeError(ConfigError):
    def __init__(self, key, value, bound):
        super().__init__(f"{key} = {value!r} is out of range (expected {bound})")
        self.key = key
        self.value = value
        self.bound = bound
