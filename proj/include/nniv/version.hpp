#pragma once

#define NNIV_VERSION "0.1.0"

namespace nniv {

inline const char* tool_version() { return NNIV_VERSION; }

}
