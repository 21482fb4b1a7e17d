#pragma once

#include "egfet/data_io.hpp"
#include "egfet/errors.hpp"
#include "egfet/extraction.hpp"
#include "egfet/model.hpp"
#include "egfet/numerics.hpp"
#include "egfet/svg_plot.hpp"
#include "egfet/sweep.hpp"
#include "egfet/units.hpp"
