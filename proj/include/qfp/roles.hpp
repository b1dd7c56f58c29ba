#pragma once

#include <string>
#include <vector>

#include "qfp/qform.hpp"

namespace qfp {

// What multiplies the value of each form in a correlation sum.
struct Role {
  enum class Kind { VonMangoldt, QForm, Divisor };
  Kind kind = Kind::VonMangoldt;
  PDBQF form;  // meaningful for QForm only

  static Role von_mangoldt() { return {}; }
  static Role qform(const PDBQF& f) { return {Kind::QForm, f}; }
  static Role divisor() { return {Kind::Divisor, {}}; }
};

inline std::string to_string(const Role& r) {
  switch (r.kind) {
    case Role::Kind::VonMangoldt: return "vm";
    case Role::Kind::QForm: return "qform " + std::to_string(r.form.a) + " " + std::to_string(r.form.b) + " " +
                                   std::to_string(r.form.c);
    case Role::Kind::Divisor: return "tau";
  }
  return "?";
}

}  // namespace qfp
