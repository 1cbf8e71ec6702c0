#ifndef SEQKRIG_VERSION_HPP
#define SEQKRIG_VERSION_HPP

#define SEQKRIG_VERSION "0.1.0"

#endif
