from .commands import RunConfig, build_config, cli

__all__ = ["RunConfig", "build_config", "cli"]
