#pragma once

#include <stdexcept>
#include <string>

namespace ews
{

//! Bad parameters, mismatched inputs, unreadable files.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! Integration or root-finding broke down.
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! The Kohn-Sham loop hit its iteration cap.
class ScfNotConverged : public NumericalError
{
  public:
    ScfNotConverged(double residual, std::string const& what)
        : NumericalError(what), residual(residual)
    {
    }
    double residual;
};

//! A requested bound state does not exist in the search window.
class StateNotFound : public std::runtime_error
{
  public:
    StateNotFound(int l, int n_r, std::string const& what)
        : std::runtime_error(what), l(l), n_r(n_r)
    {
    }
    int l;
    int n_r;
};

}  // namespace ews
