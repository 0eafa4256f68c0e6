// Copyright 2026 The fsfqpt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fsfqpt/process_tensor.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

using namespace fsfqpt;

namespace {

constexpr const char *kTensorFormat = "fsfqpt-process-tensor";
constexpr const char *kTensorLayout = "row-major j,k,m,n";

}  // namespace

ProcessTensor::ProcessTensor(const HilbertSpec &spec, std::string label)
    : spec_(spec), label_(std::move(label)), elems_(spec.dim() * spec.dim() * spec.dim() * spec.dim()) {
}

ProcessTensor ProcessTensor::identity(const HilbertSpec &spec) {
    ProcessTensor t(spec, "identity");
    for (size_t j = 0; j < spec.dim(); j++) {
        for (size_t k = 0; k < spec.dim(); k++) {
            t(j, k, j, k) = 1;
        }
    }
    return t;
}

CMatrix ProcessTensor::choi_matrix() const {
    size_t d = dim();
    CMatrix c(d * d, d * d);
    for (size_t j = 0; j < d; j++) {
        for (size_t k = 0; k < d; k++) {
            for (size_t m = 0; m < d; m++) {
                for (size_t n = 0; n < d; n++) {
                    c(j * d + m, k * d + n) = (*this)(j, k, m, n);
                }
            }
        }
    }
    return c;
}

ProcessTensor ProcessTensor::from_choi_matrix(const HilbertSpec &spec, const CMatrix &choi, std::string label) {
    size_t d = spec.dim();
    if (static_cast<size_t>(choi.rows()) != d * d || static_cast<size_t>(choi.cols()) != d * d) {
        throw std::invalid_argument("Choi matrix dimension does not match the Hilbert space");
    }
    ProcessTensor t(spec, std::move(label));
    for (size_t j = 0; j < d; j++) {
        for (size_t k = 0; k < d; k++) {
            for (size_t m = 0; m < d; m++) {
                for (size_t n = 0; n < d; n++) {
                    t(j, k, m, n) = choi(j * d + m, k * d + n);
                }
            }
        }
    }
    return t;
}

std::vector<double> ProcessTensor::layer_success() const {
    size_t d = dim();
    std::vector<double> s(d, 0.0);
    for (size_t n = 0; n < d; n++) {
        for (size_t k = 0; k < d; k++) {
            s[n] += (*this)(k, k, n, n).real();
        }
    }
    return s;
}

ProcessTensor &ProcessTensor::operator+=(const ProcessTensor &other) {
    if (!(spec_ == other.spec_)) {
        throw std::invalid_argument("cannot add process tensors of different dimension");
    }
    for (size_t i = 0; i < elems_.size(); i++) {
        elems_[i] += other.elems_[i];
    }
    return *this;
}

ProcessTensor &ProcessTensor::operator*=(double scale) {
    for (auto &e : elems_) {
        e *= scale;
    }
    return *this;
}

bool ProcessTensor::operator==(const ProcessTensor &other) const {
    if (!(spec_ == other.spec_) || label_ != other.label_) {
        return false;
    }
    return std::memcmp(elems_.data(), other.elems_.data(), elems_.size() * sizeof(cdouble)) == 0;
}

bool TensorDiagnostics::ok() const {
    return hermiticity_error <= 1e-10 && choi_min_eigenvalue >= -1e-8 && min_layer_success >= 0 &&
           max_layer_success <= 1 + 1e-10;
}

std::string TensorDiagnostics::describe() const {
    std::ostringstream ss;
    ss << "hermiticity error " << hermiticity_error << ", Choi min eigenvalue " << choi_min_eigenvalue
       << ", layer success in [" << min_layer_success << ", " << max_layer_success << "]";
    return ss.str();
}

TensorDiagnostics fsfqpt::diagnose(const ProcessTensor &t) {
    TensorDiagnostics diag;
    size_t d = t.dim();
    for (size_t j = 0; j < d; j++) {
        for (size_t k = 0; k < d; k++) {
            for (size_t m = 0; m < d; m++) {
                for (size_t n = 0; n < d; n++) {
                    double err = std::abs(t(j, k, m, n) - std::conj(t(k, j, n, m)));
                    diag.hermiticity_error = std::max(diag.hermiticity_error, err);
                }
            }
        }
    }
    diag.choi_min_eigenvalue = min_eigenvalue(t.choi_matrix());
    auto s = t.layer_success();
    diag.min_layer_success = *std::min_element(s.begin(), s.end());
    diag.max_layer_success = *std::max_element(s.begin(), s.end());
    return diag;
}

void fsfqpt::write_tensor(std::ostream &out, const ProcessTensor &t) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto &e : t.elems()) {
        entries.push_back({e.real(), e.imag()});
    }
    nlohmann::json doc = {
        {"format", kTensorFormat},
        {"version", 1},
        {"label", t.label()},
        {"n_max", t.spec().n_max()},
        {"layout", kTensorLayout},
        {"entries", std::move(entries)},
    };
    out << doc.dump() << "\n";
}

ProcessTensor fsfqpt::read_tensor(std::istream &in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(std::string("tensor file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kTensorFormat) {
            throw ParseError("not a process tensor file");
        }
        if (doc.at("layout").get<std::string>() != kTensorLayout) {
            throw ParseError("unsupported tensor layout '" + doc.at("layout").get<std::string>() + "'");
        }
        HilbertSpec spec(doc.at("n_max").get<int>());
        ProcessTensor t(spec, doc.at("label").get<std::string>());
        const auto &entries = doc.at("entries");
        if (entries.size() != t.elems().size()) {
            throw ParseError("tensor file has " + std::to_string(entries.size()) + " entries, expected " +
                             std::to_string(t.elems().size()));
        }
        size_t d = spec.dim();
        size_t i = 0;
        for (size_t j = 0; j < d; j++) {
            for (size_t k = 0; k < d; k++) {
                for (size_t m = 0; m < d; m++) {
                    for (size_t n = 0; n < d; n++, i++) {
                        const auto &pair = entries[i];
                        if (!pair.is_array() || pair.size() != 2) {
                            throw ParseError("tensor entry " + std::to_string(i) + " is not a [re, im] pair");
                        }
                        t(j, k, m, n) = cdouble(pair[0].get<double>(), pair[1].get<double>());
                    }
                }
            }
        }
        return t;
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("malformed tensor file: ") + e.what());
    } catch (const std::invalid_argument &e) {
        throw ParseError(std::string("malformed tensor file: ") + e.what());
    }
}

void fsfqpt::write_tensor_file(const std::filesystem::path &path, const ProcessTensor &t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_tensor(out, t);
}

ProcessTensor fsfqpt::read_tensor_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open tensor file " + path.string());
    }
    return read_tensor(in);
}
