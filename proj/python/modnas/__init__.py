"""Multi-objective differentiable architecture search on synthetic hardware benchmarks."""

from ._modnas import (
    ArchSpace,
    Benchmark,
    BenchmarkRecipe,
    ModnasError,
    ParameterError,
    ShapeError,
    UnsupportedError,
    UsageError,
    __version__,
    closed_form_gamma,
    dominates,
    frank_wolfe_gamma,
    gd,
    gd_plus,
    generate_benchmark,
    hypervolume,
    igd,
    igd_plus,
    nondominated,
    paper_mini_recipe,
    search,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
