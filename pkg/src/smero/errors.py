"""Exception hierarchy shared by all modules."""


class SmeroError(Exception):
    """Base class; ``code`` is the CLI exit status for the failure."""

    code = 2

    def to_json(self):
        return {"error": type(self).__name__, "message": str(self)}


class BasepointMismatch(SmeroError):
    pass


class TruncationError(SmeroError):
    """Requested a coefficient at or beyond the series truncation order."""


class PoleProximityError(SmeroError):
    pass


class DescriptorError(SmeroError):
    pass


class NonAdmissiblePole(SmeroError):
    pass


class LogTermRequired(SmeroError):
    def __init__(self, pole, lam, obstruction):
        self.pole, self.lam, self.obstruction = pole, lam, obstruction
        super().__init__(
            f"log term required at x={pole} for lambda={lam}: "
            f"|obstruction|={abs(obstruction):.3e}"
        )


class DependentSpan(SmeroError):
    pass


class ContourError(SmeroError):
    pass


class PropagationError(SmeroError):
    code = 1


class ResidueObstruction(SmeroError):
    def __init__(self, pole, residue):
        self.pole, self.residue = pole, residue
        super().__init__(f"residue obstruction at x={pole}: y^-1 coefficient {residue}")

    def to_json(self):
        d = super().to_json()
        d.update(pole=self.pole, residue=[self.residue.real, self.residue.imag])
        return d


class NonHermitianGram(SmeroError):
    pass


class AperiodicPotential(SmeroError):
    pass
