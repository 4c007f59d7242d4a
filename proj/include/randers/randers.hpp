#pragma once

#include "randers/sampling.hpp"
#include "randers/minkowski.hpp"
#include "randers/quadrature.hpp"
#include "randers/inequalities.hpp"
#include "randers/hardy.hpp"
#include "randers/campaign.hpp"
#include "randers/radial_model.hpp"
#include "randers/direct_method.hpp"
#include "randers/csv.hpp"
#include "randers/cli.hpp"
