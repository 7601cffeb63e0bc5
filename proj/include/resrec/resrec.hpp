#pragma once

#include "resrec/error.hpp"
#include "resrec/random.hpp"
#include "resrec/parallel.hpp"
#include "resrec/data.hpp"
#include "resrec/resampling.hpp"
#include "resrec/tree.hpp"
#include "resrec/knn.hpp"
#include "resrec/logreg.hpp"
#include "resrec/adaboost.hpp"
#include "resrec/learners.hpp"
#include "resrec/stats.hpp"
#include "resrec/evaluation.hpp"
#include "resrec/metafeatures.hpp"
#include "resrec/qualityvars.hpp"
#include "resrec/recommender.hpp"
#include "resrec/assessment.hpp"
#include "resrec/pipeline.hpp"
