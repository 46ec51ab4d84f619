#pragma once

// Umbrella header.

#include "bpsplit/errors.hpp"
#include "bpsplit/fp_linalg.hpp"
#include "bpsplit/monomials.hpp"
#include "bpsplit/qmodule.hpp"
#include "bpsplit/browngitler.hpp"
#include "bpsplit/margolis.hpp"
#include "bpsplit/ext.hpp"
#include "bpsplit/poly.hpp"
#include "bpsplit/parallel.hpp"
#include "bpsplit/obstruction.hpp"
#include "bpsplit/report.hpp"
