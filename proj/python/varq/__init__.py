"""In-memory relational query engine with pipeline and fused-loop backends."""

from ._varq import (
    Database,
    bench_stats,
    explain,
    generate,
    load_dir,
    make_micro_db,
    micro_sql,
    oracle,
    registry,
    run_query,
    speedup,
    verify_query,
    write_dir,
)

__all__ = [
    "Database",
    "bench_stats",
    "explain",
    "generate",
    "load_dir",
    "make_micro_db",
    "micro_sql",
    "oracle",
    "registry",
    "run_query",
    "speedup",
    "verify_query",
    "write_dir",
]
