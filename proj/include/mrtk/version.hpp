#pragma once

#define MRTK_VERSION "0.1.0"
