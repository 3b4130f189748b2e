# Services package for walsh-logmeans
