#pragma once

#include "azprobe/chess/movegen.hpp"
#include "azprobe/chess/pgn.hpp"
#include "azprobe/chess/position.hpp"
#include "azprobe/chess/types.hpp"
