#ifndef LIGHTPIPE_VERSION_HPP
#define LIGHTPIPE_VERSION_HPP

namespace lightpipe {

inline constexpr const char* version_string = "lightpipe 0.1.0";

}

#endif
