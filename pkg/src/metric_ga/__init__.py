"""GA-based optimization of MT n-best lists with composable metric fitness."""

__version__ = "0.1.0"
