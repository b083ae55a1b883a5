import importlib.resources as pkg_resources

__version__ = "0.3.1"

DATA_PATH = str(pkg_resources.files('leraBench').joinpath('data'))
