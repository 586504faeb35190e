// Copyright 2026 The Middleway Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIDDLEWAY_UNITS_HPP
#define MIDDLEWAY_UNITS_HPP

namespace middleway {

inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kMpsPerMph = 0.44704;

constexpr double mph_to_mps(double mph) { return mph * kMpsPerMph; }
constexpr double mps_to_mph(double mps) { return mps / kMpsPerMph; }
constexpr double miles_to_meters(double mi) { return mi * kMetersPerMile; }
constexpr double meters_to_miles(double m) { return m / kMetersPerMile; }

}  // namespace middleway

#endif  // MIDDLEWAY_UNITS_HPP
