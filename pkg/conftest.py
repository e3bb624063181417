import os
import sys

# Tests import both the fxp package and the root-level main.py CLI.
REPO_ROOT = os.path.dirname(os.path.abspath(__file__))
if REPO_ROOT not in sys.path:
    sys.path.insert(0, REPO_ROOT)
