// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "geocon/cli.hpp"

int main(int argc, char** argv) { return geocon::cli::run(argc, argv); }
