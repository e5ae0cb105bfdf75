# Class Refinery - finer classes for universal representations
