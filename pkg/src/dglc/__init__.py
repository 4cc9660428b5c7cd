"""Deep graph-level clustering with a GIN encoder, JS mutual information and DEC-style targets."""

__version__ = "0.1.0"
