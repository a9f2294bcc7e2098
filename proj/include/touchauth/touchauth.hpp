#pragma once

#include "touchauth/aggregation.hpp"
#include "touchauth/catalog.hpp"
#include "touchauth/classifier.hpp"
#include "touchauth/data.hpp"
#include "touchauth/error.hpp"
#include "touchauth/experiment.hpp"
#include "touchauth/features.hpp"
#include "touchauth/ingest.hpp"
#include "touchauth/kinematics.hpp"
#include "touchauth/lstm.hpp"
#include "touchauth/protocol.hpp"
#include "touchauth/roc.hpp"
#include "touchauth/selection.hpp"
#include "touchauth/synthetic.hpp"
