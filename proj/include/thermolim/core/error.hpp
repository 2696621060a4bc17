#pragma once

#include <stdexcept>
#include <string>

namespace thermolim
{
//! Raised when an operation's precondition or configuration is violated.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline void expect(bool condition, std::string const& message)
{
    if (!condition)
    {
        throw Error(message);
    }
}

}  // namespace thermolim
