# Orchestration package for walsh-logmeans
