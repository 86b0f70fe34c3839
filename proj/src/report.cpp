#include "tau2/types.hpp"
