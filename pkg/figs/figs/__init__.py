"""Batch figure rendering for hydro CSV artifacts.

Consumes only the documented schema-tagged CSV files and renders one image
per figure spec.  All computation of model quantities stays upstream; this
package draws what the files contain.
"""

from .render import render, load_csv

__version__ = "0.1.0"

__all__ = ["render", "load_csv"]
