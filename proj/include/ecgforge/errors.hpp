#pragma once

#include <stdexcept>
#include <string>

namespace ecgforge {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define ECGFORGE_DEFINE_ERROR(Name)                                  \
    struct Name : Error {                                            \
        explicit Name(const std::string& msg) : Error(msg) {}        \
    }

ECGFORGE_DEFINE_ERROR(MalformedInput);
ECGFORGE_DEFINE_ERROR(UnknownLead);
ECGFORGE_DEFINE_ERROR(NonFiniteSample);
ECGFORGE_DEFINE_ERROR(InvalidArgument);
ECGFORGE_DEFINE_ERROR(TooShort);
ECGFORGE_DEFINE_ERROR(MissingLeads);
ECGFORGE_DEFINE_ERROR(MissingReport);
ECGFORGE_DEFINE_ERROR(UpstreamUnavailable);
ECGFORGE_DEFINE_ERROR(ProtocolError);
ECGFORGE_DEFINE_ERROR(FormatViolation);
ECGFORGE_DEFINE_ERROR(ParseError);
ECGFORGE_DEFINE_ERROR(ValidationError);
ECGFORGE_DEFINE_ERROR(ShapeError);
ECGFORGE_DEFINE_ERROR(IoError);

#undef ECGFORGE_DEFINE_ERROR

}  // namespace ecgforge
