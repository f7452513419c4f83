#pragma once

#include "spinwave/errors.hpp"
#include "spinwave/wavespace.hpp"
#include "spinwave/grating.hpp"
#include "spinwave/gaussnet.hpp"
#include "spinwave/fockoracle.hpp"
#include "spinwave/correlations.hpp"
#include "spinwave/atomphys.hpp"
#include "spinwave/multiplex.hpp"
#include "spinwave/io.hpp"
#include "spinwave/lab.hpp"
