#!/usr/bin/env python3
"""Times the compiled walk kernels against the numpy fallback.

Equivalent to ``lerw-lab bench``; pass --quick for smaller workloads and
--out FILE to dump the rows as JSON.
"""

import argparse

from lerwlab.bench import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None)
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()
    main(out_path=args.out, quick=args.quick)
