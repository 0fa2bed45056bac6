from .figures import FigureJob, InputError, render

__all__ = ["FigureJob", "InputError", "render"]
