"""Exception types shared across the package."""


class ThinObstacleError(Exception):
    """Base class for all package errors."""


class NonSymmetric(ThinObstacleError):
    def __init__(self, x, residual):
        self.x = x
        self.residual = residual
        super().__init__(f"coefficient matrix not symmetric at {x} (residual {residual:.3e})")


class EllipticityViolated(ThinObstacleError):
    def __init__(self, x, xi, quotient):
        self.x = x
        self.xi = xi
        self.quotient = quotient
        super().__init__(f"ellipticity violated at {x}: Rayleigh quotient {quotient:.6g}")


class NotSPD(ThinObstacleError):
    pass


class DegenerateBasis(ThinObstacleError):
    """Gram-Schmidt pivot collapsed; cannot happen for validated elliptic A."""


class ZeroVector(ThinObstacleError):
    pass


class OutOfDomain(ThinObstacleError):
    pass


class EllipsoidExceedsDomain(ThinObstacleError):
    pass


class NotMMatrix(UserWarning):
    """Assembly produced positive off-diagonals; PSOR convergence guarantee downgraded."""


class MaxIterExceeded(ThinObstacleError):
    pass


class TooManyThinNodes(ThinObstacleError):
    pass


class NoFeasibleActiveSet(ThinObstacleError):
    """No active set yields a complementary solution; signals an assembly bug."""


class CenterNotOnThinPlane(ThinObstacleError):
    pass


class ZeroEvenEnergy(ThinObstacleError):
    def __init__(self, x0, r):
        self.x0 = x0
        self.r = r
        super().__init__(f"even part has zero energy on E_{r}({x0})")


class ZeroReplacementEnergy(ThinObstacleError):
    pass


class VanishingBoundaryMass(ThinObstacleError):
    pass


class RadiusBeyondTruncationDomain(ThinObstacleError):
    pass


class RadiusBelowResolution(ThinObstacleError):
    pass


class InsufficientSamples(ThinObstacleError):
    pass


class DegenerateFit(ThinObstacleError):
    pass


class NonnegativityViolated(ThinObstacleError):
    pass


class UnknownKind(ThinObstacleError):
    pass


class TooFewPoints(ThinObstacleError):
    pass


class ConfigError(ThinObstacleError):
    pass
