"""Helper scripts for running the nowcasting benchmark."""
