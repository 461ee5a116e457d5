#pragma once

// Invariant feature extraction through Gaussian optimal-transport barycenters:
// moment kernels, barycenter maps, the closed-form extractor, prediction
// heads, SEM simulation experiments and file formats.

#include "otbe/barycenter.hpp"
#include "otbe/csv.hpp"
#include "otbe/errors.hpp"
#include "otbe/extractor.hpp"
#include "otbe/heads.hpp"
#include "otbe/matstats.hpp"
#include "otbe/model_io.hpp"
#include "otbe/report_io.hpp"
#include "otbe/rng.hpp"
#include "otbe/schema.hpp"
#include "otbe/simlab.hpp"
