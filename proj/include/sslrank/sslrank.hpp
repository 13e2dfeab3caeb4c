#pragma once

#include "sslrank/csv.hpp"
#include "sslrank/dataset.hpp"
#include "sslrank/distances.hpp"
#include "sslrank/ensemble.hpp"
#include "sslrank/ensemble_scores.hpp"
#include "sslrank/evaluation.hpp"
#include "sslrank/laplace.hpp"
#include "sslrank/metrics.hpp"
#include "sslrank/pct.hpp"
#include "sslrank/ranking.hpp"
#include "sslrank/relief.hpp"
#include "sslrank/rng.hpp"
#include "sslrank/xval.hpp"
