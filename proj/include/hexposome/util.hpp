#pragma once

#include <string>
#include <string_view>

namespace hexposome {

// 17 significant digits: enough to round-trip any double through decimal text.
std::string format_double(double v);

// NaN renders as the empty string; everything else as format_double.
std::string format_value(double v);

double parse_double(std::string_view s);  // strict, whole-string

std::string sha256_hex(std::string_view data);

// Worker count resolution: explicit n > 0 wins, n == 0 consults
// HEXPOSOME_THREADS, then hardware concurrency.
int resolve_threads(int requested);

}  // namespace hexposome
