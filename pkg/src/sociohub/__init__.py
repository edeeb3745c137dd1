"""SocioHub: search one username across three social platforms at once."""

__version__ = "0.1.0"
