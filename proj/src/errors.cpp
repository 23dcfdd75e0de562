#include "nlmin/errors.hpp"
