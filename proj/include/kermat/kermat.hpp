#pragma once

// Umbrella header: sublinear kernel-sum estimation and subquadratic top
// eigenvector approximation over instrumented kernel evaluations.

#include "kermat/alignment.hpp"
#include "kermat/core.hpp"
#include "kermat/exclusion.hpp"
#include "kermat/experiment.hpp"
#include "kermat/fgt.hpp"
#include "kermat/instances.hpp"
#include "kermat/io.hpp"
#include "kermat/kde.hpp"
#include "kermat/mvm.hpp"
#include "kermat/oracle.hpp"
#include "kermat/power.hpp"
#include "kermat/rng.hpp"
#include "kermat/sum.hpp"
