"""Exception hierarchy shared across the package."""


class FatouAtlasError(Exception):
    """Base class for all package errors."""


class NonConvergence(FatouAtlasError):
    """Root finder residual stayed above tolerance after the iteration budget."""


class NotParabolic(FatouAtlasError):
    """Operation requires a parabolic cycle with multiplier 1."""


class IllConditioned(FatouAtlasError):
    """Contour radius search failed, typically because fixed points are merging."""


class AngleOverflow(FatouAtlasError):
    """Exact angle arithmetic exceeded the configured denominator or orbit cap."""


class OutOfBox(FatouAtlasError):
    """Query point lies outside the raster box."""


class UnknownComponent(FatouAtlasError):
    """Component id does not exist in this component map."""


class RayCrisis(FatouAtlasError):
    """Ray continuation lost the branch, typically near a precritical point."""

    def __init__(self, msg, angle=None, potential=None):
        super().__init__(msg)
        self.angle = angle
        self.potential = potential


class NotLanded(FatouAtlasError):
    """Ray path was truncated, so it has no landing point."""


class SuperattractingUnsupported(FatouAtlasError):
    """Internal rays need a non-zero attracting multiplier at the origin."""


class DivergedFromBasin(FatouAtlasError):
    """Internal ray continuation left the attracting basin."""


class NotAttracting(FatouAtlasError):
    """Operation requires an attracting fixed point at the origin."""


class NoBoundarySeed(FatouAtlasError):
    """Tree boundary carries no critical or parabolic point, so the next
    level cannot be seeded.  Carries the measured evidence."""

    def __init__(self, msg, min_crit_distance=None, parabolic_found=False):
        super().__init__(msg)
        self.min_crit_distance = min_crit_distance
        self.parabolic_found = parabolic_found


class NoBoundaryCycle(FatouAtlasError):
    """No repelling cycle of period >= 2 was found on the basin boundary."""


class NoLandingRays(FatouAtlasError):
    """No candidate rational ray landed at the chosen boundary cycle."""

    def __init__(self, msg, nearest_misses=()):
        super().__init__(msg)
        self.nearest_misses = tuple(nearest_misses)


class DepthBudgetExceeded(FatouAtlasError):
    """Graph preimages grew denser than the raster can resolve."""


class InsufficientDepth(FatouAtlasError):
    """Nest was not computed deep enough for the requested query."""


class OnGraph(FatouAtlasError):
    """Target point sits on the rasterized graph skeleton at some depth."""

    def __init__(self, msg, depth=None):
        super().__init__(msg)
        self.depth = depth


class NotInterior(FatouAtlasError):
    """Shape query point is not strictly inside the component."""


class SingularParameter(FatouAtlasError):
    """Family parameter hits a pole of the parametrization."""
