#pragma once

#include "steklov/asymptotics.hpp"
#include "steklov/chebyshev.hpp"
#include "steklov/compare.hpp"
#include "steklov/config.hpp"
#include "steklov/dd.hpp"
#include "steklov/dnmap.hpp"
#include "steklov/geometry.hpp"
#include "steklov/muntz.hpp"
#include "steklov/ode.hpp"
#include "steklov/quadrature.hpp"
#include "steklov/scaled_value.hpp"
#include "steklov/stability.hpp"
#include "steklov/transform.hpp"
#include "steklov/util.hpp"
