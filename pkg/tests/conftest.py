import pathlib
import sys

# Allow running the suite from a checkout without installing the package.
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
