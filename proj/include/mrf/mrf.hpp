#pragma once

#include "mrf/container.hpp"
#include "mrf/dictionary.hpp"
#include "mrf/epg.hpp"
#include "mrf/forward_model.hpp"
#include "mrf/geometry.hpp"
#include "mrf/matching.hpp"
#include "mrf/matrix_io.hpp"
#include "mrf/metrics.hpp"
#include "mrf/phantom.hpp"
#include "mrf/schedule.hpp"
#include "mrf/solvers.hpp"
#include "mrf/sweep.hpp"
#include "mrf/tv.hpp"
