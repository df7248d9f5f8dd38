#pragma once

#include "autoad/error.hpp"
#include "autoad/series.hpp"
#include "autoad/csv.hpp"
#include "autoad/changepoint.hpp"
#include "autoad/spectrum.hpp"
#include "autoad/profiling.hpp"
#include "autoad/tail.hpp"
#include "autoad/config.hpp"
#include "autoad/structural.hpp"
#include "autoad/filtering.hpp"
#include "autoad/model.hpp"
#include "autoad/injection.hpp"
#include "autoad/cost.hpp"
#include "autoad/tpe.hpp"
#include "autoad/evaluation.hpp"
#include "autoad/serialize.hpp"
#include "autoad/orchestrator/job.hpp"
#include "autoad/orchestrator/store.hpp"
#include "autoad/orchestrator/alert.hpp"
#include "autoad/orchestrator/orchestrator.hpp"
#include "autoad/bench/nab.hpp"
#include "autoad/bench/metrics.hpp"
#include "autoad/bench/replay.hpp"
#include "autoad/bench/runtime.hpp"
#include "autoad/bench/report.hpp"
