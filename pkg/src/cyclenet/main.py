import sys
from typing import Optional, Sequence


def launch(argv: Optional[Sequence[str]] = None) -> None:
    """Console entry point, alias of `cyclenet.cli.main`"""

    from cyclenet.cli import main

    sys.exit(main(argv))
