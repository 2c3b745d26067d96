#pragma once

#include "azprobe/concepts/catalogue.hpp"
#include "azprobe/concepts/dataset.hpp"
#include "azprobe/concepts/table.hpp"
