#include "mprf/bit_source.h"

namespace mprf {

FieldElement CounterRng::NextField(const Field& field) {
  const int bits = field.bit_length();
  const uint128 mask = bits >= 128 ? ~uint128{0} : (uint128{1} << bits) - 1;
  for (;;) {
    uint128 v = (static_cast<uint128>(Next()) << 64) | Next();
    v &= mask;
    if (v < field.modulus()) return FieldElement(v);
  }
}

}  // namespace mprf
