#pragma once

#include "cupolet/analysis.hpp"
#include "cupolet/config.hpp"
#include "cupolet/control.hpp"
#include "cupolet/cupolet.hpp"
#include "cupolet/dynsys.hpp"
#include "cupolet/entangle.hpp"
#include "cupolet/errors.hpp"
#include "cupolet/exchange.hpp"
#include "cupolet/io.hpp"
#include "cupolet/parallel.hpp"
#include "cupolet/section.hpp"
#include "cupolet/targeting.hpp"
#include "cupolet/version.hpp"
