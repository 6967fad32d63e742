"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad keys, inconsistent grids, missing inputs).

    ``problems`` carries every violation found so a user can fix them all at
    once instead of replaying the parser error by error.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class BlowupError(RuntimeError):
    """Simulation produced a non-finite field or broke the stability guard.

    Carries the failing step index and whatever trajectory prefix was
    recorded, so a blown-up run can still be inspected.
    """

    def __init__(self, message, step, trajectory=None):
        super().__init__(f"{message} (step {step})")
        self.step = step
        self.trajectory = trajectory
