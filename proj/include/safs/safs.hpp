#pragma once

#include "safs/bench.hpp"
#include "safs/binning.hpp"
#include "safs/csv.hpp"
#include "safs/description.hpp"
#include "safs/error.hpp"
#include "safs/inference.hpp"
#include "safs/parallel.hpp"
#include "safs/report.hpp"
#include "safs/rng.hpp"
#include "safs/scan.hpp"
#include "safs/selection.hpp"
#include "safs/synthetic.hpp"
#include "safs/tabular.hpp"
