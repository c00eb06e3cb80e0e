#pragma once

#include <string>
#include <vector>

#include "hexposome/hexgrid.hpp"
#include "hexposome/ingest.hpp"

namespace hexposome {

enum class Classing { quantile, bivariate, ceem_threshold };

struct RenderOptions {
    Classing classing = Classing::quantile;
    std::string variable;
    std::string variable2;  // second axis, bivariate only
    std::string period;     // required when the frame spans several periods
    int classes = 5;        // quantile class count
    // Optional override; must carry one color per class (classes, 2, or 16).
    std::vector<std::string> palette;
};

// One polygon per cell, classed fills, and a legend. Output depends only on
// the inputs: rows render in canonical frame order and every coordinate is
// printed with fixed decimals, so equal inputs give byte-equal SVG.
// Cells missing the variable draw in a neutral no-data fill.
std::string render_svg(const HexFrame& frame, const GridSpec& g, const RenderOptions& opt);

}  // namespace hexposome
