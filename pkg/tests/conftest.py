import sys
from pathlib import Path

# make the sibling oracle helpers importable no matter how pytest is invoked
sys.path.insert(0, str(Path(__file__).parent))
