#pragma once

#include "cwpolar/analysis.hpp"
#include "cwpolar/chain_builders.hpp"
#include "cwpolar/chain_io.hpp"
#include "cwpolar/channel.hpp"
#include "cwpolar/coding.hpp"
#include "cwpolar/enumeration.hpp"
#include "cwpolar/error.hpp"
#include "cwpolar/fraction.hpp"
#include "cwpolar/parallel.hpp"
#include "cwpolar/parameters.hpp"
#include "cwpolar/polar_transform.hpp"
#include "cwpolar/process_model.hpp"
#include "cwpolar/sampling.hpp"
#include "cwpolar/trellis.hpp"
