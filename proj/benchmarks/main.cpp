#include <benchmark/benchmark.h>

// The packaged benchmark_main archive carries incompatible LTO bytecode.
BENCHMARK_MAIN();
