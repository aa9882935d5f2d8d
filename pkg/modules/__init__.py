"""delegatix: delegation and information design toolkit."""
