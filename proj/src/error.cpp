#include "gslb/error.hpp"

namespace gslb {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::UnderflowClose: return "UnderflowClose";
    case Errc::UnknownApp: return "UnknownApp";
    case Errc::NodeDown: return "NodeDown";
    case Errc::LastAddress: return "LastAddress";
    case Errc::DuplicateAddress: return "DuplicateAddress";
    case Errc::UnknownAddress: return "UnknownAddress";
    case Errc::AllSelectorsDown: return "AllSelectorsDown";
    case Errc::NoHealthyBackend: return "NoHealthyBackend";
    case Errc::Overloaded: return "Overloaded";
    case Errc::UnknownAssignment: return "UnknownAssignment";
    case Errc::UnknownBackend: return "UnknownBackend";
    case Errc::TimeReversal: return "TimeReversal";
    case Errc::SystemUnavailable: return "SystemUnavailable";
    case Errc::MixedSpecs: return "MixedSpecs";
    case Errc::SchemaError: return "SchemaError";
    case Errc::BindFailure: return "BindFailure";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace gslb
