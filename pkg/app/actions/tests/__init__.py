# Test package for app.actions 